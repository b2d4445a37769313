var tools = new Map();
registerTools(tools);
app.post('/tool', (req, res) => {
  var tool = tools.get(req.tool);
  if (typeof tool !== 'function') return;
  tool(req.args);
});
