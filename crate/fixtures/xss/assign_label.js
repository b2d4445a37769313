const label = function (request, response) {
  var tag = request.tag;
  tag = escape(tag);
  log(tag);
  var markup = "<span>" + tag + "</span>";
  response.send(markup);
};
