const search = function (request, response) {
  var term = request.query;
  term = escape(term);
  var body = "<p>Results for " + term + "</p>";
  response.write(body);
};
